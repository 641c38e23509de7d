import sys

from tccsim.cli import main

sys.exit(main())
