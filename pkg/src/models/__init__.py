# Empty init file for models package
