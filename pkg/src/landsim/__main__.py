import sys

from landsim.cli import main

sys.exit(main())
