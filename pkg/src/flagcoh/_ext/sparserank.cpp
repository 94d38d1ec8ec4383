// Rank of a sparse matrix over F_p by Markowitz-ordered Gaussian elimination.
// Input rows in CSR form (int64 buffers); values must already lie in [0, p).
#define PY_SSIZE_T_CLEAN
#include <Python.h>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

namespace {

struct Entry {
    int64_t c;
    uint64_t v;
};

uint64_t inv_mod(uint64_t a, uint64_t p) {
    int64_t t = 0, nt = 1, r = (int64_t)p, nr = (int64_t)a;
    while (nr) {
        int64_t q = r / nr;
        int64_t tmp = t - q * nt; t = nt; nt = tmp;
        tmp = r - q * nr; r = nr; nr = tmp;
    }
    if (t < 0) t += (int64_t)p;
    return (uint64_t)t;
}

bool row_has(const std::vector<Entry>& row, int64_t c, uint64_t* val) {
    auto it = std::lower_bound(row.begin(), row.end(), c,
                               [](const Entry& e, int64_t x) { return e.c < x; });
    if (it != row.end() && it->c == c) {
        if (val) *val = it->v;
        return true;
    }
    return false;
}

// x mod p for 0 <= x < p*p + p, by table lookup when p is small
struct Reducer {
    uint64_t p;
    std::vector<uint32_t> tab;
    explicit Reducer(uint64_t p_) : p(p_) {
        if (p <= 2048) {
            tab.resize(p * p + p);
            for (uint64_t x = 0; x < tab.size(); ++x) tab[x] = (uint32_t)(x % p);
        }
    }
    inline uint64_t operator()(uint64_t x) const { return tab.empty() ? x % p : tab[x]; }
};

int64_t markowitz_rank(std::vector<std::vector<Entry>>& R, int64_t ncols, uint64_t p) {
    const int64_t nrows = (int64_t)R.size();
    const Reducer mod(p);
    std::vector<std::vector<int64_t>> C(ncols);
    std::vector<int64_t> cnt(ncols, 0);
    std::vector<char> alive(nrows, 0), done(ncols, 0);
    for (int64_t i = 0; i < nrows; ++i) {
        if (R[i].empty()) continue;
        alive[i] = 1;
        for (const Entry& e : R[i]) {
            C[e.c].push_back(i);
            cnt[e.c]++;
        }
    }
    typedef std::pair<int64_t, int64_t> Item;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    for (int64_t c = 0; c < ncols; ++c)
        if (cnt[c]) heap.push(Item(cnt[c], c));
    std::vector<int64_t> stamp(nrows, -1), members;
    std::vector<Entry> merged;
    int64_t rank = 0;
    while (!heap.empty()) {
        Item top = heap.top();
        heap.pop();
        int64_t c = top.second;
        if (done[c]) continue;
        if (cnt[c] != top.first) {
            if (cnt[c]) heap.push(Item(cnt[c], c));
            continue;
        }
        if (cnt[c] == 0) { done[c] = 1; continue; }
        members.clear();
        for (int64_t j : C[c]) {
            if (!alive[j] || stamp[j] == c) continue;
            if (!row_has(R[j], c, nullptr)) continue;
            stamp[j] = c;
            members.push_back(j);
        }
        C[c].clear();
        done[c] = 1;
        if (members.empty()) continue;
        int64_t piv = members[0];
        for (int64_t j : members)
            if (R[j].size() < R[piv].size()) piv = j;
        std::vector<Entry> prow;
        prow.swap(R[piv]);
        alive[piv] = 0;
        for (const Entry& e : prow) cnt[e.c]--;
        rank++;
        uint64_t pv = 0;
        row_has(prow, c, &pv);
        uint64_t inv = inv_mod(pv, p);
        for (Entry& e : prow) e.v = e.v * inv % p;  // pivot entry becomes 1
        for (int64_t j : members) {
            if (j == piv) continue;
            std::vector<Entry>& r = R[j];
            uint64_t f = 0;
            row_has(r, c, &f);
            uint64_t nf = (p - f) % p;
            merged.clear();
            merged.reserve(r.size() + prow.size());
            size_t a = 0, b = 0;
            while (a < r.size() || b < prow.size()) {
                if (b == prow.size() || (a < r.size() && r[a].c < prow[b].c)) {
                    merged.push_back(r[a]);
                    ++a;
                } else if (a == r.size() || prow[b].c < r[a].c) {
                    uint64_t v = mod(nf * prow[b].v);
                    if (v) {
                        merged.push_back(Entry{prow[b].c, v});
                        cnt[prow[b].c]++;
                        C[prow[b].c].push_back(j);
                    }
                    ++b;
                } else {
                    uint64_t v = mod(r[a].v + nf * prow[b].v);
                    if (v) merged.push_back(Entry{r[a].c, v});
                    else cnt[r[a].c]--;
                    ++a;
                    ++b;
                }
            }
            r.swap(merged);
            if (r.empty()) alive[j] = 0;
        }
        for (const Entry& e : prow)
            if (!done[e.c] && cnt[e.c]) heap.push(Item(cnt[e.c], e.c));
    }
    return rank;
}

PyObject* py_rank(PyObject*, PyObject* args) {
    Py_buffer ptr, cols, vals;
    long long ncols, p;
    if (!PyArg_ParseTuple(args, "y*y*y*LL", &ptr, &cols, &vals, &ncols, &p)) return nullptr;
    const int64_t* rp = (const int64_t*)ptr.buf;
    const int64_t* cc = (const int64_t*)cols.buf;
    const int64_t* vv = (const int64_t*)vals.buf;
    int64_t nrows = ptr.len / (Py_ssize_t)sizeof(int64_t) - 1;
    int64_t nnz = cols.len / (Py_ssize_t)sizeof(int64_t);
    bool bad = nrows < 0 || vals.len != cols.len || p < 2;
    std::vector<std::vector<Entry>> R;
    if (!bad) {
        R.resize(nrows);
        for (int64_t i = 0; i < nrows && !bad; ++i) {
            int64_t s = rp[i], e = rp[i + 1];
            if (s < 0 || e < s || e > nnz) { bad = true; break; }
            std::vector<Entry>& row = R[i];
            row.reserve(e - s);
            for (int64_t k = s; k < e; ++k) {
                if (cc[k] < 0 || cc[k] >= ncols) { bad = true; break; }
                int64_t v = vv[k] % p;
                if (v < 0) v += p;
                if (v) row.push_back(Entry{cc[k], (uint64_t)v});
            }
            std::sort(row.begin(), row.end(), [](const Entry& x, const Entry& y) { return x.c < y.c; });
            for (size_t k = 1; k < row.size(); ++k)
                if (row[k].c == row[k - 1].c) bad = true;
        }
    }
    PyBuffer_Release(&ptr);
    PyBuffer_Release(&cols);
    PyBuffer_Release(&vals);
    if (bad) {
        PyErr_SetString(PyExc_ValueError, "malformed sparse matrix");
        return nullptr;
    }
    int64_t r;
    Py_BEGIN_ALLOW_THREADS
    r = markowitz_rank(R, ncols, (uint64_t)p);
    Py_END_ALLOW_THREADS
    return PyLong_FromLongLong(r);
}

PyMethodDef methods[] = {
    {"rank", py_rank, METH_VARARGS, "rank(row_ptr, cols, vals, ncols, p) -> int"},
    {nullptr, nullptr, 0, nullptr},
};

PyModuleDef moduledef = {PyModuleDef_HEAD_INIT, "_sparserank", nullptr, -1, methods};

}  // namespace

PyMODINIT_FUNC PyInit__sparserank(void) { return PyModule_Create(&moduledef); }
