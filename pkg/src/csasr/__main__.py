import sys

from csasr.cli import main

sys.exit(main())
