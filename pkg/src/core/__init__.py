# Empty init file for core package
