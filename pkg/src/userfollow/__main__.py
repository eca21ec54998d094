import sys

from userfollow.cli import main

sys.exit(main())
