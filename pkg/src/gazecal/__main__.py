import sys

from gazecal.cli import main

sys.exit(main())
