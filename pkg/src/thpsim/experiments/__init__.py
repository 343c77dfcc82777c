"""Monte Carlo experiments, statistical validation and the command-line front end."""
