import sys

from dropcal.cli import main

sys.exit(main())
