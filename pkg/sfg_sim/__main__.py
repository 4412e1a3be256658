import sys

from sfg_sim.main import main

sys.exit(main())
