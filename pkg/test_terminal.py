import io

from rich.console import Console

from terminal import ReportTerminal


def make_terminal():
    return ReportTerminal(Console(file=io.StringIO(), width=120, color_system=None))


def test_messages_keep_bracketed_text():
    terminal = make_terminal()
    terminal.print_error("[toric] L: must be at least 2")
    terminal.print_warning("[run] traces: ignored")
    terminal.print_info("[gauge] dims")
    terminal.print_success("[ramp] done")
    text = terminal.console.file.getvalue()
    for tag in ("[toric] L: must be at least 2", "[run] traces", "[gauge] dims", "[ramp] done"):
        assert tag in text
    assert text.startswith("ERROR:")


def test_summary_panel_keeps_bracketed_values():
    terminal = make_terminal()
    terminal.show_summary("Run", {'section': "[toric]", 'ratio': 0.5})
    text = terminal.console.file.getvalue()
    assert "[toric]" in text
    assert "0.5" in text
