from hypsolve.cli import main

main()
