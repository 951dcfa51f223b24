import sys

from mccm.cli import main

sys.exit(main())
