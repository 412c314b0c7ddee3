import sys

from cfaudit.cli import main

sys.exit(main())
