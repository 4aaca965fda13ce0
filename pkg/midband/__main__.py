import sys

from midband.cli.main import main

sys.exit(main())
