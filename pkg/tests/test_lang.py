"""Domain language: parsing, validation diagnostics, serialization round-trip."""

import random

from chainreact.lang import (
    DomainDefinition,
    LiftedAtom,
    LiftedLiteral,
    OperatorSchema,
    parse_domain,
    parse_problem,
    serialize_domain,
    serialize_problem,
)
from tests.util import kitchen_domain, kitchen_source, problem_source

MINIMAL = "(define (domain d) (:types t) (:predicates (p ?x - t)) )"


def domains_equal(a: DomainDefinition, b: DomainDefinition) -> bool:
    return (
        a.name == b.name
        and a.types == b.types
        and a.constants == b.constants
        and a.predicates == b.predicates
        and a.operators == b.operators
    )


class TestParseDomain:
    def test_minimal(self):
        result = parse_domain(MINIMAL)
        assert result.ok, result.diagnostics
        d = result.value
        assert set(d.types) == {"t"}
        assert len(d.predicates) == 1 and d.predicates[0].name == "p"
        assert d.operators == []

    def test_kitchen_parses(self):
        d = kitchen_domain()
        assert d.name == "kitchen"
        assert len(d.predicates) == 29
        assert len(d.operators) == 16
        assert d.constants == {"handle": "graspable"}
        assert d.types == {"movable": "graspable", "graspable": None}

    def test_arity_mismatch_position(self):
        src = "(define (domain d)\n(:types t)\n(:predicates (p ?x - t))\n(:action a\n  :precondition (p x y)\n))"
        # p is unary but used with two args; also x/y are unknown objects,
        # the arity error must come first and carry the right position.
        result = parse_domain(src)
        assert not result.ok
        errors = [d for d in result.diagnostics if d.code == "arity-mismatch"]
        assert errors, result.diagnostics
        assert errors[0].line == 5
        assert errors[0].column >= 17

    def test_unbalanced_parens(self):
        result = parse_domain("(define (domain d) (:types t)")
        assert not result.ok
        assert any(d.code == "unbalanced-parens" for d in result.diagnostics)

    def test_unknown_section(self):
        result = parse_domain("(define (domain d) (:bogus x))")
        assert not result.ok
        assert any(d.code == "unknown-section" for d in result.diagnostics)

    def test_undeclared_type(self):
        result = parse_domain("(define (domain d) (:predicates (p ?x - ghost)))")
        assert not result.ok
        assert any(d.code == "undeclared-type" for d in result.diagnostics)

    def test_duplicate_names(self):
        result = parse_domain(
            "(define (domain d) (:types t) (:predicates (p ?x - t) (p ?x - t)))"
        )
        assert not result.ok
        assert any(d.code == "duplicate-name" for d in result.diagnostics)

    def test_unbound_variable(self):
        result = parse_domain(
            "(define (domain d) (:types t) (:predicates (p ?x - t))"
            " (:action a :parameters () :precondition (p ?z)))"
        )
        assert not result.ok
        assert any(d.code == "unbound-variable" for d in result.diagnostics)

    def test_add_delete_overlap_rejected(self):
        result = parse_domain(
            "(define (domain d) (:predicates (p))"
            " (:action a :effect (and (p) (not (p)))))"
        )
        assert not result.ok
        assert any(d.code == "add-delete-overlap" for d in result.diagnostics)

    def test_runcondition_parsed(self):
        result = parse_domain(
            "(define (domain d) (:predicates (p) (q))"
            " (:action a :precondition (p) :runcondition (q) :effect (and)))"
        )
        assert result.ok
        op = result.value.operators[0]
        assert op.run == frozenset({LiftedLiteral(LiftedAtom("q"))})
        assert op.pre == frozenset({LiftedLiteral(LiftedAtom("p"))})

    def test_runcondition_defaults_to_pre(self):
        result = parse_domain(
            "(define (domain d) (:predicates (p)) (:action a :precondition (p)))"
        )
        assert result.ok
        op = result.value.operators[0]
        assert op.run is None
        assert op.effective_run == op.pre

    def test_keywords_case_insensitive_symbols_not(self):
        result = parse_domain(
            "(DEFINE (Domain d) (:TYPES t) (:Predicates (Pred ?x - t)))"
        )
        assert result.ok
        assert result.value.predicates[0].name == "Pred"

    def test_diagnostic_positions_inside_source(self):
        bad_sources = [
            "(define (domain d) (:types t) (:predicates (p ?x - ghost)))",
            "(define (domain d)\n  (:bogus))",
            "(define (domain d) (:predicates (p)) (:action a :effect (and (p) (not (p)))))",
        ]
        for src in bad_sources:
            lines = src.splitlines()
            for diag in parse_domain(src).diagnostics:
                assert 1 <= diag.line <= len(lines)
                assert 1 <= diag.column <= len(lines[diag.line - 1]) + 1


class TestParseProblem:
    def test_kitchen_problem(self):
        domain = kitchen_domain()
        result = parse_problem(problem_source("put_away_spam"), domain)
        assert result.ok, result.diagnostics
        p = result.value
        assert p.objects == {"spam": "movable", "sugar": "movable"}
        assert len(p.goal) == 2
        assert LiftedLiteral(LiftedAtom("obj_is_in_drawer", ("spam",))) in p.goal

    def test_empty_goal(self):
        domain = kitchen_domain()
        src = "(define (problem p) (:domain kitchen) (:objects spam - movable) (:init) (:goal (and)))"
        result = parse_problem(src, domain)
        assert result.ok
        assert result.value.goal == frozenset()

    def test_goal_type_error(self):
        domain = kitchen_domain()
        # handle is graspable, not movable; obj_is_in_drawer expects movable
        src = "(define (problem p) (:domain kitchen) (:objects spam - movable) (:goal (obj_is_in_drawer handle)))"
        result = parse_problem(src, domain)
        assert not result.ok
        assert any(d.code == "type-error" for d in result.diagnostics)

    def test_unknown_object_type(self):
        domain = kitchen_domain()
        src = "(define (problem p) (:domain kitchen) (:objects spam - widget) (:goal (and)))"
        result = parse_problem(src, domain)
        assert not result.ok
        assert any(d.code == "undeclared-type" for d in result.diagnostics)

    def test_wrong_domain_name(self):
        domain = kitchen_domain()
        src = "(define (problem p) (:domain bathroom) (:goal (and)))"
        result = parse_problem(src, domain)
        assert not result.ok
        assert any(d.code == "wrong-domain" for d in result.diagnostics)

    def test_ill_typed_init_atom(self):
        domain = kitchen_domain()
        src = (
            "(define (problem p) (:domain kitchen) (:objects spam - movable)"
            " (:init (obj_is_on_counter handle)) (:goal (and)))"
        )
        result = parse_problem(src, domain)
        assert not result.ok
        assert any(d.code == "type-error" for d in result.diagnostics)


class TestRoundTrip:
    def test_kitchen_round_trip(self):
        d = kitchen_domain()
        reparsed = parse_domain(serialize_domain(d))
        assert reparsed.ok, reparsed.diagnostics
        assert domains_equal(d, reparsed.value)

    def test_minimal_round_trip(self):
        d = parse_domain(MINIMAL).value
        assert domains_equal(d, parse_domain(serialize_domain(d)).value)

    def test_problem_round_trip(self):
        domain = kitchen_domain()
        for name in ("put_away_spam", "put_away_both", "open_drawer"):
            p = parse_problem(problem_source(name), domain).value
            reparsed = parse_problem(serialize_problem(p), domain)
            assert reparsed.ok
            q = reparsed.value
            assert (p.objects, p.init, p.goal) == (q.objects, q.init, q.goal)

    def test_round_trip_with_injected_comments(self):
        rng = random.Random(7)
        src = serialize_domain(kitchen_domain())
        lines = src.splitlines()
        for _ in range(20):
            i = rng.randrange(len(lines))
            lines.insert(i, f"  ; noise comment {rng.random()}  ")
            j = rng.randrange(len(lines))
            lines[j] = lines[j] + "   ; trailing ; nested ; comment"
        noisy = "\n".join(lines)
        reparsed = parse_domain(noisy)
        assert reparsed.ok, reparsed.diagnostics
        assert domains_equal(kitchen_domain(), reparsed.value)

    def test_random_generated_domains_round_trip(self):
        rng = random.Random(42)
        for _ in range(25):
            d = _random_domain(rng)
            result = parse_domain(serialize_domain(d))
            assert result.ok, result.diagnostics
            assert domains_equal(d, result.value)


class TestTotality:
    def test_fuzz_random_bytes_never_crash(self):
        rng = random.Random(1234)
        domain = kitchen_domain()
        for size in (0, 1, 17, 256, 4096, 65536):
            for _ in range(8):
                blob = bytes(rng.randrange(256) for _ in range(size))
                text = blob.decode("utf-8", errors="replace")
                parse_domain(text)
                parse_problem(text, domain)
        # one full-size case: a megabyte of arbitrary bytes
        blob = bytes(rng.randrange(256) for _ in range(1 << 20))
        result = parse_domain(blob.decode("utf-8", errors="replace"))
        assert result.value is not None or result.diagnostics

    def test_fuzz_paren_soup(self):
        rng = random.Random(99)
        alphabet = "()()()abc ?x - :types :action ; \n"
        for _ in range(200):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(400)))
            result = parse_domain(text)
            if result.value is None:
                assert result.diagnostics

    def test_mutated_kitchen_never_crashes(self):
        rng = random.Random(5)
        src = kitchen_source()
        for _ in range(100):
            chars = list(src)
            for _ in range(rng.randrange(1, 6)):
                i = rng.randrange(len(chars))
                op = rng.randrange(3)
                if op == 0:
                    del chars[i]
                elif op == 1:
                    chars.insert(i, rng.choice("()?-:xyz "))
                else:
                    chars[i] = rng.choice("()?-:xyz ")
            parse_domain("".join(chars))


def _random_domain(rng: random.Random) -> DomainDefinition:
    d = DomainDefinition(name=f"dom{rng.randrange(100)}")
    types = [f"t{i}" for i in range(rng.randint(1, 3))]
    d.types = {t: None for t in types}
    d.constants = {}
    if rng.random() < 0.5:
        d.constants[f"c{rng.randrange(10)}"] = rng.choice(types)
    preds = []
    for i in range(rng.randint(1, 6)):
        arity = rng.randint(0, 2)
        param_types = tuple(rng.choice(types) for _ in range(arity))
        preds.append(type(kitchen_domain().predicates[0])(f"p{i}", param_types))
    d.predicates = preds
    for i in range(rng.randint(0, 4)):
        params = tuple(
            (f"?v{j}", rng.choice(types)) for j in range(rng.randint(0, 2))
        )
        var_pool = [v for v, _ in params]

        def random_atom() -> LiftedAtom | None:
            pred = rng.choice(preds)
            args = []
            for t in pred.param_types:
                candidates = [v for v, vt in params if vt == t]
                candidates += [c for c, ct in d.constants.items() if ct == t]
                if not candidates:
                    return None
                args.append(rng.choice(candidates))
            return LiftedAtom(pred.name, tuple(args))

        def atoms(n):
            out = set()
            for _ in range(n):
                a = random_atom()
                if a is not None:
                    out.add(a)
            return out

        pre = frozenset(LiftedLiteral(a, rng.random() < 0.8) for a in atoms(2))
        run = (
            frozenset(LiftedLiteral(a) for a in atoms(1))
            if rng.random() < 0.4
            else None
        )
        adds = atoms(2)
        deletes = atoms(2) - adds
        d.operators.append(
            OperatorSchema(
                f"a{i}", params, pre, run, frozenset(adds), frozenset(deletes),
                binding=f"b{i}" if rng.random() < 0.7 else "",
            )
        )
    return d


def test_list_in_place_of_name_rejected():
    result = parse_domain("(define (domain (x)) (:types t))")
    assert not result.ok
    assert any(d.code == "missing-name" for d in result.diagnostics)
    result = parse_problem("(define (problem (x)) (:domain kitchen))", kitchen_domain())
    assert not result.ok
