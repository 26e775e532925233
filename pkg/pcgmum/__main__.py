from pcgmum.cli import main

main()
