# harvest/__main__.py
from harvest.main import main

main()
