import sys

from fuzzymon.cli import main

sys.exit(main())
