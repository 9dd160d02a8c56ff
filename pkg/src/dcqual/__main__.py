from dcqual.cli import main

raise SystemExit(main())
