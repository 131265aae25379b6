import sys

from wincss.cli import main

sys.exit(main())
