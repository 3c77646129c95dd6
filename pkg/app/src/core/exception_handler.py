from app.src.core.lab_errors import (
    LabError,
    ValidationError,
    NumericalError,
    StorageError,
)
from app.src.core.ui import LabUI
from app.utils.constants import EXIT_OK, EXIT_IO, EXIT_NUMERICAL
from app.utils.ui_messages import UI_MESSAGES
from dataclasses import dataclass
from typing import Callable
import logging


logger = logging.getLogger(__name__)


@dataclass
class CommandResult:
    """Outcome of one CLI command: exit code, one-line summary, report path."""

    exit_code: int
    summary: str = ""
    report_path: str | None = None

    @property
    def ok(self) -> bool:
        return self.exit_code == EXIT_OK


class CommandExceptionHandler:
    """Centralized exception handling for lab commands."""

    @staticmethod
    def _title_for(error: LabError) -> str:
        if isinstance(error, ValidationError):
            return UI_MESSAGES["titles"]["validation"]
        if isinstance(error, StorageError):
            return UI_MESSAGES["titles"]["storage"]
        if isinstance(error, NumericalError):
            return UI_MESSAGES["titles"]["numerical"]
        return UI_MESSAGES["titles"]["error"]

    @staticmethod
    def handle_command(
        operation: Callable[[], CommandResult],
        ui: LabUI,
        propagate: bool = False,
    ) -> CommandResult:
        """Run a command and map failures onto the 0/1/2/3 exit taxonomy.

        Args:
            operation: Zero-argument callable returning a CommandResult.
            ui: UI used to print the diagnostic on stderr.
            propagate: Re-raise instead of converting (used by tests).

        Returns:
            CommandResult: The command's own result, or one describing the failure.
        """
        try:
            return operation()

        except LabError as e:
            if propagate:
                raise
            logger.debug("command failed", exc_info=True)
            ui.error(str(e), title=CommandExceptionHandler._title_for(e))
            return CommandResult(exit_code=e.exit_code, summary=str(e))

        except OSError as e:
            if propagate:
                raise
            ui.error(str(e), title=UI_MESSAGES["titles"]["storage"])
            return CommandResult(exit_code=EXIT_IO, summary=str(e))

        except Exception as e:
            if propagate:
                raise
            logger.exception("unexpected failure")
            msg = UI_MESSAGES["errors"]["unexpected_error"].format(e)
            ui.error(msg)
            return CommandResult(exit_code=EXIT_NUMERICAL, summary=msg)
