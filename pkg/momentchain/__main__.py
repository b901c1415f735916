import sys

from momentchain.cli import main

sys.exit(main())
