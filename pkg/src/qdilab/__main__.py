import sys

from qdilab.cli import main

sys.exit(main())
