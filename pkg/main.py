from dotenv import load_dotenv
load_dotenv()

from app import CLI, default_ui
from app.utils.constants import DEFAULT_LOG_LEVEL

from rich.logging import RichHandler
import os
import sys
import json
import logging


########### load the configuration ###########

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
config_path = os.path.join(BASE_DIR, "config.json")
try:
    with open(config_path) as f:
        config = json.load(f)
except FileNotFoundError:
    default_ui.error("Configuration file 'config.json' not found.")
    sys.exit(1)
except json.JSONDecodeError:
    default_ui.error("Configuration file 'config.json' is not a valid JSON.")
    sys.exit(1)
except Exception as e:
    default_ui.error(f"An unexpected error occurred: {e}")
    sys.exit(1)


########### logging ###########

def setup_logging(config: dict):
    level_name = (os.getenv("FROD_LOG_LEVEL") or config.get("log_level") or DEFAULT_LOG_LEVEL).upper()
    level = getattr(logging, level_name, logging.WARNING)
    handlers: list[logging.Handler] = [
        RichHandler(console=default_ui.err_console, show_path=False, rich_tracebacks=True)
    ]
    log_file = os.getenv("FROD_LOG_FILE")
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        handlers.append(file_handler)
    logging.basicConfig(level=level, format="%(message)s", datefmt="[%X]", handlers=handlers)


########### run the CLI ###########

def main():
    setup_logging(config)
    client = CLI(config=config)
    result = client.run(sys.argv[1:])
    sys.exit(result.exit_code)

if __name__ == "__main__":
    main()
