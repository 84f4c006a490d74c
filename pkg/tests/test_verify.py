import json

import pytest

from lookdown import verify, zlaw
from lookdown.errors import ConfigurationError


def test_fast_checks_pass_and_serialize():
    suite = verify.run_suite("quick", only=[1, 2, 10])
    assert suite.all_passed
    payload = json.loads(suite.to_json())
    assert payload["pass"] is True
    assert [c["criterion"] for c in payload["checks"]] == [1, 2, 10]
    for c in payload["checks"]:
        assert c["detail"]
        assert c["seconds"] >= 0


def test_unknown_profile_rejected():
    with pytest.raises(ConfigurationError):
        verify.run_suite("huge")


def test_tampering_fails_named_check(monkeypatch):
    # breaking one exact constant must fail exactly the constants check
    real = zlaw.pmf_Z

    def tampered(z):
        return 0.4 if z == 1 else real(z)

    monkeypatch.setattr(verify.zlaw, "pmf_Z", tampered)
    suite = verify.run_suite("quick", only=[1])
    assert not suite.all_passed
    assert suite.results[0].name == "exact-constants"


def test_echo_lines(capsys):
    verify.run_suite("quick", only=[1], echo=print)
    out = capsys.readouterr().out
    assert "criterion  1 [exact-constants] PASS" in out
