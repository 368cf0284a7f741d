import sys

from mcastsim.cli import main

sys.exit(main())
