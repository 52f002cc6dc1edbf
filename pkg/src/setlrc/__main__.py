import sys

from setlrc.cli import main

sys.exit(main())
