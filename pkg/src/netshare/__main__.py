import sys

from netshare.cli import main

sys.exit(main())
