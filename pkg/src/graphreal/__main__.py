import sys

from graphreal.cli import main

sys.exit(main())
