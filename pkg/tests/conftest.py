import sys
from pathlib import Path

# make helpers importable regardless of the invocation directory
sys.path.insert(0, str(Path(__file__).parent))
