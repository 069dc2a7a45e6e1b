import sys

from lyapmix.cli import main

sys.exit(main())
