#!/usr/bin/env python3
"""
Script to clear cached sparrow-search fitness values in Redis after changing
the training code (cached scores would otherwise be reused)
"""

import os
import redis
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

FITNESS_KEY_PATTERN = "ssa:fitness:*"


def clear_fitness_cache():
    """Clear all fitness cache entries from Redis."""
    redis_url = os.getenv("REDIS_URL")

    if not redis_url:
        print("REDIS_URL not found in environment variables")
        return False

    try:
        r = redis.from_url(redis_url)
        r.ping()
        print("Connected to Redis")

        deleted_count = 0
        for key in r.scan_iter(match=FITNESS_KEY_PATTERN, count=500):
            r.delete(key)
            deleted_count += 1

        if deleted_count == 0:
            print("No fitness cache keys found")
            return True
        print(f"Cleared {deleted_count} fitness cache keys")

        remaining = sum(1 for _ in r.scan_iter(match=FITNESS_KEY_PATTERN, count=500))
        if remaining:
            print(f"{remaining} fitness keys still remain")
        else:
            print("All fitness cache entries cleared")
        return True

    except redis.ConnectionError:
        print("Could not connect to Redis")
        return False
    except Exception as e:
        print(f"Error clearing cache: {e}")
        return False


if __name__ == "__main__":
    print("Clearing sparrow-search fitness cache...")
    success = clear_fitness_cache()
    if success:
        print("Next tuning run will re-train every candidate.")
    else:
        print("Failed to clear cache. Check Redis connection.")
        raise SystemExit(1)
