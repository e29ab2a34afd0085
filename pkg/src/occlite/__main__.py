import sys

from occlite.cli import main

sys.exit(main())
