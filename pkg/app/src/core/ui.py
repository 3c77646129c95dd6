from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from app.utils.constants import CONSOLE_WIDTH, THEME
from app.utils.ui_messages import UI_MESSAGES
from typing import Any


class LabUI:

    def __init__(self, console: Console, err_console: Console | None = None):
        self.console = console
        self.err_console = err_console or Console(stderr=True, width=console.width)

    def _style(self, color_key: str) -> str:
        return THEME.get(color_key, THEME["text"])

    def summary(self, line: str):
        """Print the one-line human summary of a command on stdout."""
        self.console.print(line, highlight=False, markup=False)

    def status_message(
        self, title: str, message: str, style: str = "primary", stderr: bool = True
    ):
        panel = Panel(
            message,
            title=f"[bold]{title}[/bold]",
            border_style=self._style(style),
            padding=(0, 1),
        )
        (self.err_console if stderr else self.console).print(panel)

    def table(self, title: str, columns: list[str], rows: list[list[Any]]):
        table = Table(title=title, border_style=self._style("muted"))
        for col in columns:
            table.add_column(col, style=self._style("secondary"))
        for row in rows:
            table.add_row(*(str(v) for v in row))
        self.err_console.print(table)

    def error(self, error_msg: str, title: str | None = None):
        self.status_message(
            title=title or UI_MESSAGES["titles"]["error"],
            message=f"{error_msg}",
            style="error",
        )


default_ui = LabUI(Console(width=CONSOLE_WIDTH))
