import sys

from drift_ensemble.cli import main

sys.exit(main())
