import os
from dotenv import load_dotenv

load_dotenv()

# Numerics
EPSILON = float(os.getenv("OPEN_GAMES_EPSILON", 1e-9))
MAX_HORIZON = int(os.getenv("OPEN_GAMES_MAX_HORIZON", 5000))

# Enumeration guards
ENUMERATION_GUARD = int(os.getenv("OPEN_GAMES_ENUMERATION_GUARD", 10**6))
STRATEGY_GUARD = int(os.getenv("OPEN_GAMES_STRATEGY_GUARD", 10**6))

# Analysis defaults
DEFAULT_DEPTH = int(os.getenv("OPEN_GAMES_DEFAULT_DEPTH", 12))
THREADS = int(os.getenv("OPEN_GAMES_THREADS", 1))
LOG_LEVEL = os.getenv("OPEN_GAMES_LOG_LEVEL", "WARNING")
