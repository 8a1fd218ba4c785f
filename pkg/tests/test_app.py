import os

import pytest

AppTest = pytest.importorskip("streamlit.testing.v1").AppTest

APP_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "app.py")


def test_dashboard_renders():
    app = AppTest.from_file(APP_PATH)
    app.run(timeout=60)
    assert not app.exception
    assert app.title[0].value == "Meixner Toolkit"


def test_dashboard_classifies_default_tensor():
    app = AppTest.from_file(APP_PATH)
    app.run(timeout=60)
    assert any("CaseI" in h.value for h in app.subheader)
