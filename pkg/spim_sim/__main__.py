from spim_sim.main import main

raise SystemExit(main())
