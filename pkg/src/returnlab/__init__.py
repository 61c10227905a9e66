"""Return times of simple random walks: exact tables, electrical networks, simulation."""
