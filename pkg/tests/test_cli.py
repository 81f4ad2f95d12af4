import pytest

from safeguard.app import App
from safeguard.cli import main
from safeguard.config import ServiceConfig, load_config
from safeguard.geo import GeoPoint


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "safeguard.conf"
    path.write_text(
        f"data_dir={tmp_path / 'data'}\n"
        "bind_address=127.0.0.1:0\n"
        "password_iterations=4096\n"
        "# comment lines are fine\n"
    )
    return path


def test_unknown_command_exits_nonzero_with_usage(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["unknown-cmd"])
    assert excinfo.value.code != 0
    assert "usage" in capsys.readouterr().err.lower()


def test_no_command_prints_usage(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_seed_pois_reports_counts(tmp_path, config_file, capsys):
    csv_path = tmp_path / "sample.csv"
    csv_path.write_text(
        "id,name,category,lat,lon\n"
        "h1,Hospital One,hospital,23.81,90.41\n"
        "bad,Nope,clinic,1,2\n"
        "p1,Police One,police,23.82,90.42\n"
    )
    assert main(["seed-pois", str(csv_path), "--config", str(config_file)]) == 0
    out = capsys.readouterr()
    assert "accepted 2 rejected 1" in out.out
    assert "line 3" in out.err

    # the installed file round-trips through the app's startup ingestion
    config = load_config(config_file)
    app = App(config)
    try:
        assert app.geo.poi_count == 2
        results = app.geo.nearby(GeoPoint(23.8103, 90.4125), "hospital", 5, 10_000)
        assert [p.id for p, _ in results] == ["h1"]
    finally:
        app.close()


def test_seed_pois_missing_file_fails(config_file, capsys):
    assert main(["seed-pois", "/nonexistent/pois.csv", "--config", str(config_file)]) == 1
    assert "error" in capsys.readouterr().err


def test_create_admin_then_promote(config_file, capsys):
    assert main(["create-admin", "boss@x.y", "--config", str(config_file)]) == 0
    out = capsys.readouterr().out
    assert "created admin boss@x.y" in out
    assert "password: " in out

    assert main(["create-admin", "boss@x.y", "--config", str(config_file)]) == 0
    assert "promoted boss@x.y" in capsys.readouterr().out

    config = load_config(config_file)
    app = App(config)
    try:
        user_id = app.auth._find_user_id_by_email("boss@x.y")
        assert app.auth.get_user(user_id).is_admin
    finally:
        app.close()


def test_outbox_tail_sms_mirrors_fan_out(config_file, capsys):
    config = load_config(config_file)
    app = App(config)
    try:
        user_id, vt = app.auth.register("A", "B", "a@x.y", "hunter22")
        app.auth.verify_email(vt.token)
        app.sos.set_contacts(user_id, ["+111", "+222"])
        app.sos.trigger_sos(user_id, GeoPoint(23.8103, 90.4125), now=1000)
    finally:
        app.close()
    assert main(["outbox", "tail", "sms", "--config", str(config_file)]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 2
    assert all("23.810300,90.412500" in line for line in lines)


def test_outbox_tail_mail_prints_newest(config_file, capsys):
    config = load_config(config_file)
    app = App(config)
    try:
        _, vt = app.auth.register("A", "B", "a@x.y", "hunter22")
    finally:
        app.close()
    assert main(["outbox", "tail", "mail", "--config", str(config_file)]) == 0
    out = capsys.readouterr().out
    assert "To: a@x.y" in out
    assert vt.token in out


def test_outbox_tail_empty_is_quiet(config_file, capsys):
    assert main(["outbox", "tail", "push", "--config", str(config_file)]) == 0
    assert capsys.readouterr().out == ""


def test_config_parsing_and_validation(tmp_path):
    good = tmp_path / "good.conf"
    good.write_text("bind_address=0.0.0.0:9000\ncheckpoints=login,desk\n")
    config = load_config(good)
    assert config.port == 9000
    assert config.checkpoints == ("login", "desk")

    bad = tmp_path / "bad.conf"
    bad.write_text("no_such_key=1\n")
    with pytest.raises(ValueError):
        load_config(bad)

    with pytest.raises(ValueError):
        ServiceConfig(bind_address="missing-port")
    with pytest.raises(ValueError):
        ServiceConfig(session_ttl_seconds=0)
