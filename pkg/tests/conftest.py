import sys
from pathlib import Path

from hypothesis import settings

# The shared oracle helpers live next to the tests.
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")
