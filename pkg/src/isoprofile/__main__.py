"""Allow ``python -m isoprofile``"""

from .cli import main

if __name__ == "__main__":
    main()
