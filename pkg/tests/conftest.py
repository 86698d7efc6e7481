import sys
from pathlib import Path

# make tests/ importable as a flat namespace (nets.py, oracle.py helpers)
sys.path.insert(0, str(Path(__file__).parent))
