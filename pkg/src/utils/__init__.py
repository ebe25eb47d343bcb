# Empty init file for utils package
