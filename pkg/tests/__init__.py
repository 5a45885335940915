# Tests for greyharvest
