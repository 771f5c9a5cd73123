# Author: gadwant
from dualbound.cli import main

raise SystemExit(main())
