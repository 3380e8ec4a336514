from pathlib import Path

from lscsim.model import parse_model

FIXTURES = Path(__file__).parent / "fixtures"

ORDER_LOOP = "(createOrder·(createAbort+createConfirm))*"
ANY_ORDER = "(createOrder+createAbort+createConfirm)*"
PAR_RUN = "(createOrder·(createAbort||createConfirm))*"

EXPRESSIONS = [
    ORDER_LOOP,
    ANY_ORDER,
    PAR_RUN,
    "a||b",
    "a‖b",
    "(a·b)||c",
    "(a+b)||(c·d)",
    "a*||b",
    "<a>·b",
    "⟨a⟩·(b+c)*",
    "λ + a·b*",
    "(a+b)*·c",
    "((a·b)*+c)*",
]


def fixture_text(*names: str) -> str:
    return "\n".join((FIXTURES / n).read_text(encoding="utf-8") for n in names)


def load(*names: str):
    return parse_model(fixture_text(*names))


def web():
    return load("weborder.lsc")


def web_anti():
    return load("weborder.lsc", "anti_scenario.lsc")


def web_equal():
    return load("weborder.lsc", "test_equal_conf.lsc")


def web_path():
    return load("weborder.lsc", "test_abort_confirm.lsc")
