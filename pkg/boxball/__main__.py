import sys

from boxball.cli import main

sys.exit(main())
