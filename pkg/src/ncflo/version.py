VERSION = "0.1.0"

#: Bump when the instances.csv column set changes.
SCHEMA_VERSION = 1
