import sys

from pinnkit.cli.run import main

sys.exit(main())
