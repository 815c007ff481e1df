import sys

from resolimit.cli import main

sys.exit(main())
