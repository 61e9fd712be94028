import sys

from cgks.harness.cli import main

sys.exit(main())
