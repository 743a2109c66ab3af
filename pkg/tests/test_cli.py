import io

from parley.cli import build_parser, main, run_repl, run_script
from parley.engine import Engine


def test_script_mode_prints_exchange(engine, tmp_path, capsys):
    script = tmp_path / "script.txt"
    script.write_text("Let's talk about movies.\nI watched Jason Bourne recently.\n")
    run_script(engine, script)
    out = capsys.readouterr().out
    assert out.startswith("system> What do you want to talk about?")
    assert "user> Let's talk about movies." in out
    assert out.count("system>") == 3


def test_main_with_script_uses_default_config(tmp_path, capsys):
    script = tmp_path / "script.txt"
    script.write_text("who stars in it?\n")
    assert main(["--script", str(script)]) == 0
    assert "system>" in capsys.readouterr().out


def test_repl_quit_prints_metrics(engine_config):
    engine = Engine(engine_config)
    stdin = io.StringIO("I watched Jason Bourne recently.\n/quit\n")
    out = io.StringIO()
    run_repl(engine, stdin=stdin, out=out)
    text = out.getvalue()
    assert "system>" in text
    assert "vocabulary_diversity" in text


def test_repl_debug_toggle(engine_config):
    engine = Engine(engine_config)
    stdin = io.StringIO("/debug\nI watched Jason Bourne recently.\n/quit\n")
    out = io.StringIO()
    run_repl(engine, stdin=stdin, out=out)
    text = out.getvalue()
    assert "debug on" in text
    assert '"candidates"' in text  # inspector payload printed


def test_repl_scripted_monster_dialogue(engine_config):
    engine = Engine(engine_config)
    lines = [
        "Sure.",
        "I guess, I mean I like movies about aliens.",
        "I just saw Aliens the other day. Can you tell me about it.",
        "What did you think of it?",
        "Same",
        "Absolutely",
        "What was the first movie to feature a vampire?",
        "/quit",
    ]
    out = io.StringIO()
    run_repl(engine, stdin=io.StringIO("\n".join(lines) + "\n"), out=out)
    text = out.getvalue()
    assert "Nosferatu" in text
    assert "Aliens" in text


def test_parser_flags():
    args = build_parser().parse_args(
        ["--config", "c.json", "--port", "9999", "--repl", "--transcript", "t", "--script", "s.txt"]
    )
    assert args.port == 9999 and args.repl and str(args.script) == "s.txt"
