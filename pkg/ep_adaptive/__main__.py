from ep_adaptive.cli import main

raise SystemExit(main())
