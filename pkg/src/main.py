from dotenv import load_dotenv
import logging

# Load environment variables from .env file
load_dotenv()

from commands.registry import CommandApp
from commands.data_commands import router as data_router
from commands.model_commands import router as model_router
from commands.tune_commands import router as tune_router
from commands.replay_commands import router as replay_router
from utils.config import LOG_LEVEL

app = CommandApp(
    prog="etcn",
    description="Fault diagnosis toolkit: plant scenarios, ETCN training, sparrow-search tuning, evaluation.",
)

app.include_router(data_router)
app.include_router(model_router)
app.include_router(tune_router)
app.include_router(replay_router)


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return app.run(argv)


if __name__ == "__main__":
    raise SystemExit(main())
