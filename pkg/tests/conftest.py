import sys
from pathlib import Path

# allow `from helpers import ...` regardless of invocation directory
sys.path.insert(0, str(Path(__file__).parent))
