"""
Report Terminal for the Digital Quantum Simulator
Rich console output for run reports, verification tables and log messages

Features:
- Styled error / warning / info / success messages
- Tables for per-sweep series, ramp traces and verification checks
- Panels for run summaries
- Root logging through rich's RichHandler
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table


def setup_logging(verbose: bool = False, console: Optional[Console] = None):
    """INFO (DEBUG with verbose) on the root logger through RichHandler"""
    level = logging.DEBUG if verbose else logging.INFO
    handler = RichHandler(console=console or Console(stderr=True), show_path=verbose,
                          rich_tracebacks=True, markup=False)
    root = logging.getLogger()
    for existing in list(root.handlers):
        if isinstance(existing, RichHandler):
            root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level)


class ReportTerminal:
    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    def print_error(self, message: str):
        self.console.print(f"[bold red]ERROR:[/bold red] {escape(message)}")

    def print_warning(self, message: str):
        self.console.print(f"[yellow]WARNING:[/yellow] {escape(message)}")

    def print_info(self, message: str):
        self.console.print(f"[cyan]INFO:[/cyan] {escape(message)}")

    def print_success(self, message: str):
        self.console.print(f"[green]SUCCESS:[/green] {escape(message)}")

    def show_separator(self):
        self.console.rule(style="green")

    def show_table(self, title: str, columns: Sequence[str], rows: Iterable[Sequence[object]],
                   max_rows: Optional[int] = None):
        """Numbers are printed with 6 significant digits"""
        table = Table(title=title, header_style="bold green")
        for column in columns:
            table.add_column(column, justify="right")
        shown = 0
        for row in rows:
            if max_rows is not None and shown >= max_rows:
                table.add_row(*(["..."] * len(columns)))
                break
            table.add_row(*(_cell(value) for value in row))
            shown += 1
        self.console.print(table)

    def show_series(self, title: str, times: Sequence[float], means: Dict[str, Sequence[float]],
                    errors: Optional[Dict[str, Sequence[float]]] = None, max_rows: int = 25):
        """One row per sweep: time, then mean (+- stderr) per observable"""
        names = sorted(means)
        columns = ['sweep', 'time'] + names
        rows = []
        for k, t in enumerate(times):
            row: List[object] = [k, t]
            for name in names:
                value = _cell(means[name][k])
                if errors is not None and name in errors:
                    value = f"{value} ± {_cell(errors[name][k])}"
                row.append(value)
            rows.append(row)
        self.show_table(title, columns, _thin(rows, max_rows))

    def show_checks(self, checks: Sequence[object]):
        """Verification results (name, measured, tolerance, passed)"""
        table = Table(title="Verification", header_style="bold green")
        for column in ('check', 'measured', 'tolerance', 'result'):
            table.add_column(column, justify="left" if column == 'check' else "right")
        for check in checks:
            status = "[green]PASS[/green]" if check.passed else "[bold red]FAIL[/bold red]"
            table.add_row(check.name, _cell(check.measured), check.tolerance, status)
        self.console.print(table)

    def show_summary(self, title: str, values: Dict[str, object]):
        lines = [f"[green]{escape(key)}[/green]: {escape(_cell(value))}"
                 for key, value in values.items()]
        self.console.print(Panel("\n".join(lines), title=title, border_style="green"))


def _cell(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _thin(rows: List[List[object]], max_rows: int) -> List[List[object]]:
    """Keep at most max_rows rows, always including the last one"""
    if len(rows) <= max_rows:
        return rows
    stride = -(-len(rows) // max_rows)
    kept = rows[::stride]
    if kept[-1] is not rows[-1]:
        kept.append(rows[-1])
    return kept
