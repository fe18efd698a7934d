"""Acceptance criteria, each at its stated size and tolerance."""

import copy
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from csoclosure import cli
from csoclosure.approxkak import build_blocks, certify, paired_view
from csoclosure.audit import dumps, verify_certificate
from csoclosure.csofit import defect, fit, hermitian_from_params, symmetric_unitary
from csoclosure.errors import CertificateError
from csoclosure.exact import parse_exact, to_str
from csoclosure.shiftcore import (
    decompose,
    is_cso_truncation,
    is_palindromic,
    operator_norm,
    shift_distance,
    shift_matrix,
    symmetric_unitary_conjugation,
    truncate_by_threshold,
)
from csoclosure.sstdemo import (
    approximant_defect,
    principal_submatrix,
    residual_grid,
    sst_approximant,
)
from csoclosure.weightgen import (
    EXAMPLE,
    KAKUTANI,
    check_distinct,
    kakutani_closed,
    kakutani_recursive,
)

EIGHTH = Fraction(1, 8)


def criterion(number, title):
    return pytest.mark.criterion(number, title)


@criterion(1, "Kakutani recursion equals closed form for n <= 2^16 in < 5 s")
def test_c1_oracle_equivalence():
    t = time.perf_counter()
    bad = [n for n in range(1, 2**16 + 1) if kakutani_recursive(n) != kakutani_closed(n)]
    elapsed = time.perf_counter() - t
    assert bad == []
    assert elapsed < 5


@criterion(2, "Kakutani prefixes of length 2^m - 1 are palindromes, m <= 12")
def test_c2_prefix_palindromy():
    for m in range(1, 13):
        c = 2**m
        assert all(kakutani_closed(k) == kakutani_closed(c - k) for k in range(1, c))
        assert all(kakutani_recursive(k) == kakutani_recursive(c - k) for k in range(1, c))


@criterion(3, "threshold truncation is palindromic at distance exactly eps, eps = 1/2..1/1024")
def test_c3_truncation():
    L = 2**14
    prefix = KAKUTANI.prefix(L)
    for j in range(1, 11):
        eps = Fraction(1, 2**j)
        beta = truncate_by_threshold(KAKUTANI, eps, L)
        d = decompose(beta)
        assert all(is_palindromic(b) for b in d.blocks)
        assert is_cso_truncation(d)
        assert shift_distance(prefix, beta) == eps


@pytest.fixture(scope="module")
def certificates():
    t = time.perf_counter()
    certs = {
        "kakutani": certify(KAKUTANI, EIGHTH, 3),
        "example": certify(EXAMPLE, EIGHTH, 3),
    }
    return certs, time.perf_counter() - t


@criterion(4, "certify(kakutani / example, eps = 1/8, K = 3): all bounds, identities, < 60 s")
def test_c4_pipeline(certificates):
    certs, elapsed = certificates
    assert elapsed < 60
    for name, cert in certs.items():
        plan = cert.plan
        at = plan.at
        assert cert.ok, name
        assert plan.rounds == 3
        assert all(0 < w < EIGHTH / 2 for _, _, w in cert.zeroed_weights)
        assert len(cert.zeroed_weights) == 7
        assert all(b < EIGHTH / 2 for _, b in cert.pair_bounds)
        assert cert.prefix_distance < EIGHTH
        assert all(at(k) < at(k + 1) for k in range(1, 7))
        for k in range(3):
            assert at(2 * k + 2) + at(2 * k) == at(2 * k + 3) + at(2 * k - 1)
            assert 2 * at(2 * k) <= at(2 * k + 2)
    # independently derived plan and distances
    m = (0, 64, 64, 1984, 2048, 63552, 65472, 2033600, 2095104)
    assert certs["kakutani"].plan.m == m and certs["example"].plan.m == m
    assert certs["kakutani"].prefix_distance == Fraction(1, 64)
    assert to_str(certs["example"].prefix_distance) == "1/64+3^-1984+3^-63552+3^-2033600"
    assert [to_str(b, notation="triadic") for _, b in certs["example"].pair_bounds] == [
        "0+3^-1985", "0+3^-63553", "0+3^-2033601"
    ]


@criterion(5, "paired blocks A_{2k+3} (+) A'_{2k+3} pass is_cso_truncation")
def test_c5_output_palindromy(certificates):
    certs, _ = certificates
    small = certify(EXAMPLE, EIGHTH, 2)
    for seq, plan in ((KAKUTANI, certs["kakutani"].plan), (EXAMPLE, small.plan)):
        view = paired_view(seq, plan)
        assert is_cso_truncation(decompose(view))
        blocks = build_blocks(plan)
        assert len(decompose(view).blocks) == 2 * plan.rounds
        for k in range(plan.rounds):
            w = blocks[2 * k + 3].weights(seq)
            assert is_palindromic(w + [Fraction(0)] + w[::-1])
    # the example blocks are not palindromes on their own: the pairing is doing the work
    w = build_blocks(small.plan)[3].weights(EXAMPLE)
    assert not is_palindromic(w)


@criterion(6, "example weights alpha_1..alpha_4096 are pairwise distinct in < 10 s")
def test_c6_example_distinct():
    t = time.perf_counter()
    rep = check_distinct(EXAMPLE, 4096)
    assert rep.distinct and rep.witness is None
    assert time.perf_counter() - t < 10


@criterion(7, "2^-m occurs 2^(k-m-1) times among the first 2^k Kakutani weights")
def test_c7_multiplicity_law():
    counts = Counter()
    n = 0
    for k in range(1, 15):
        while n < 2**k:
            n += 1
            counts[kakutani_closed(n)] += 1
        for m in range(k):
            assert counts[Fraction(1, 2**m)] == 2 ** (k - m - 1)


def random_symmetric_unitary(rng, n):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, n))) @ Q.T


@criterion(8, "strong-* construction on 20 random 32 x 32 matrices")
def test_c8_sst():
    rng = np.random.default_rng(20240601)
    D = 32
    for _ in range(20):
        T = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
        norm_T = operator_norm(T)
        for n in range(1, D + 1):
            A = principal_submatrix(T, n)
            assert operator_norm(sst_approximant(A)) <= norm_T + 1e-10
            assert approximant_defect(A) <= 1e-12
            c = symmetric_unitary_conjugation(random_symmetric_unitary(rng, n))
            assert approximant_defect(A, c) <= 1e-12
        for adjoint in (False, True):
            grid = residual_grid(T, adjoint=adjoint)
            for i in range(D):
                col = grid[i:, i]
                assert np.all(np.diff(col) <= 0)
                assert col[-1] == 0


@criterion(9, "fitter: palindromic blocks < 1e-8, (1, 1/2) defect 1/2, S invariants over 1000 draws")
def test_c9_fitter():
    for n in range(3, 9):
        w = [1 / (1 + min(k, n - 2 - k)) for k in range(n - 1)]
        assert fit(shift_matrix(w)).residual < 1e-8
    J = np.fliplr(np.eye(3))
    assert abs(defect(shift_matrix([1, 0.5]), J) - 0.5) <= 1e-12
    rng = np.random.default_rng(1000)
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        S = symmetric_unitary(hermitian_from_params(rng.uniform(-np.pi, np.pi, n * n), n))
        assert np.linalg.norm(S - S.T, 2) <= 1e-12
        assert np.linalg.norm(S @ S.conj().T - np.eye(n), 2) <= 1e-12


def _tampered(doc):
    def bump(text):
        return to_str(parse_exact(text) + Fraction(1, 10**9))

    for i in range(len(doc["zeroed_weights"])):
        d = copy.deepcopy(doc)
        d["zeroed_weights"][i]["weight"] = bump(d["zeroed_weights"][i]["weight"])
        yield d
    for i in range(len(doc["pair_bounds"])):
        d = copy.deepcopy(doc)
        d["pair_bounds"][i]["bound"] = bump(d["pair_bounds"][i]["bound"])
        yield d
    for i in range(len(doc["plan"]["delta"])):
        d = copy.deepcopy(doc)
        d["plan"]["delta"][i] = bump(d["plan"]["delta"][i])
        yield d
    for key in ("t_prime_distance", "t_double_prime_gap", "prefix_distance"):
        d = copy.deepcopy(doc)
        d[key] = bump(d[key])
        yield d


@criterion(10, "certificates verify after serialisation; any tampered bound exits with code 4")
def test_c10_audit(certificates, tmp_path, capsys):
    certs, _ = certificates
    small = certify(EXAMPLE, EIGHTH, 2)
    for cert, seq in ((certs["kakutani"], KAKUTANI), (certs["example"], EXAMPLE), (small, EXAMPLE)):
        path = tmp_path / f"{seq.name}.json"
        path.write_text(dumps(cert.to_dict()))
        assert cli.main(["verify", str(path)]) == 0
    doc = small.to_dict()
    n = 0
    for bad in _tampered(doc):
        with pytest.raises(CertificateError):
            verify_certificate(bad, EXAMPLE)
        path.write_text(dumps(bad))
        assert cli.main(["verify", str(path)]) == 4
        n += 1
    assert n == 5 + 2 + 2 + 3
    capsys.readouterr()
