from skyline.cli import main

main()
