/* Dot products, cosine costs, DTW / subsequence DTW recurrence and backtracking.
 *
 * Dot products are plain sequential sums over the embedding axis (no fused
 * multiply-add, build with -ffp-contract=off), so every entry is independent
 * of blocking and of argument order, and the numpy fallback can reproduce it
 * bit for bit.
 *
 * The forward pass stores values only: D[i,j] = C[i,j] + min(min(diag, up), left).
 * Path lengths come from backtracking, which applies the tie rule
 * (diagonal, then vertical, then horizontal) to the stored values.
 *
 * Rows are swept in skewed strips of PID_STRIP so that several independent
 * dependency chains are in flight; this does not change any cell's value.
 * The fused entry point computes each strip's costs just before sweeping it,
 * so the full cost matrix never touches memory.
 */
#ifndef PIECEID_DTW_H
#define PIECEID_DTW_H

#include <stddef.h>

#define PID_STRIP 4
#define PID_ZERO_SNAP 1e-12

typedef double pid_v8 __attribute__((vector_size(64), aligned(8)));
typedef long long pid_v8l __attribute__((vector_size(64), aligned(8)));

/* Lane-wise mask ? a : b. */
static inline pid_v8 pid_sel(pid_v8l mask, pid_v8 a, pid_v8 b)
{
    return (pid_v8)(((pid_v8l)a & mask) | ((pid_v8l)b & ~mask));
}

static inline double pid_min(double a, double b) { return b < a ? b : a; }

/* Cosine distance from a dot product of unit vectors: 1 - g clipped to [0, 2],
 * values below PID_ZERO_SNAP set to 0. Must agree with the numpy code. */
static inline double pid_dist(double g)
{
    double c = 1.0 - g;
    c = c < 0.0 ? 0.0 : c;
    c = c > 2.0 ? 2.0 : c;
    return c < PID_ZERO_SNAP ? 0.0 : c;
}

static void pid_cost_from_gram(double *G, size_t k)
{
    const pid_v8 zero = {0}, two = zero + 2.0, one = zero + 1.0, snap = zero + PID_ZERO_SNAP;
    size_t t = 0;
    for (; t + 8 <= k; t += 8) {
        pid_v8 c = one - *(pid_v8 *)(G + t);
        c = pid_sel(c < zero, zero, c);
        c = pid_sel(c > two, two, c);
        *(pid_v8 *)(G + t) = pid_sel(c < snap, zero, c);
    }
    for (; t < k; t++) G[t] = pid_dist(G[t]);
}

#define PID_TILE 16

/* Columns after padding m up to a whole number of tiles. */
static inline ptrdiff_t pid_padded(ptrdiff_t m) { return (m + PID_TILE - 1) / PID_TILE * PID_TILE; }

/* Bt (d x mp) = B (m x d) transposed, columns m..mp-1 zero. */
static void pid_transpose(const double *B, ptrdiff_t m, ptrdiff_t d, double *Bt, ptrdiff_t mp)
{
    ptrdiff_t j, k;
    for (k = 0; k < d; k++)
        for (j = m; j < mp; j++) Bt[(size_t)k * mp + j] = 0.0;
    for (j = 0; j < m; j++)
        for (k = 0; k < d; k++) Bt[(size_t)k * mp + j] = B[(size_t)j * d + k];
}

/* out[r*ldo + j] = sum_k A[r*d + k] * Bt[k*mp + j] for r < nr and j < mp,
 * summed in increasing k. mp must be a multiple of PID_TILE; every lane is
 * independent, so padding columns do not disturb real ones. */
static void pid_gram_rows(const double *A, ptrdiff_t nr, const double *Bt, ptrdiff_t mp,
                          ptrdiff_t d, double *out, ptrdiff_t ldo)
{
    ptrdiff_t r = 0, j, k;
    for (; r + 4 <= nr; r += 4) {
        const double *a = A + (size_t)r * d;
        double *o = out + (size_t)r * ldo;
        for (j = 0; j < mp; j += PID_TILE) {
            pid_v8 z = {0}, p0 = z, p1 = z, q0 = z, q1 = z, s0 = z, s1 = z, t0 = z, t1 = z;
            for (k = 0; k < d; k++) {
                const double *b = Bt + (size_t)k * mp + j;
                pid_v8 x = *(const pid_v8 *)b, y = *(const pid_v8 *)(b + 8);
                double w0 = a[k], w1 = a[d + k], w2 = a[2 * d + k], w3 = a[3 * d + k];
                p0 = p0 + w0 * x; p1 = p1 + w0 * y;
                q0 = q0 + w1 * x; q1 = q1 + w1 * y;
                s0 = s0 + w2 * x; s1 = s1 + w2 * y;
                t0 = t0 + w3 * x; t1 = t1 + w3 * y;
            }
            *(pid_v8 *)(o + j) = p0; *(pid_v8 *)(o + j + 8) = p1;
            *(pid_v8 *)(o + ldo + j) = q0; *(pid_v8 *)(o + ldo + j + 8) = q1;
            *(pid_v8 *)(o + 2 * ldo + j) = s0; *(pid_v8 *)(o + 2 * ldo + j + 8) = s1;
            *(pid_v8 *)(o + 3 * ldo + j) = t0; *(pid_v8 *)(o + 3 * ldo + j + 8) = t1;
        }
    }
    for (; r < nr; r++) {
        const double *a = A + (size_t)r * d;
        double *o = out + (size_t)r * ldo;
        for (j = 0; j < mp; j += PID_TILE) {
            pid_v8 p0 = {0}, p1 = p0;
            for (k = 0; k < d; k++) {
                const double *b = Bt + (size_t)k * mp + j;
                p0 = p0 + a[k] * *(const pid_v8 *)b;
                p1 = p1 + a[k] * *(const pid_v8 *)(b + 8);
            }
            *(pid_v8 *)(o + j) = p0; *(pid_v8 *)(o + j + 8) = p1;
        }
    }
}

/* Full (n x m) product into out (row stride ldo >= mp); work holds d * mp doubles. */
static void pid_gram(const double *A, ptrdiff_t n, const double *B, ptrdiff_t m, ptrdiff_t d,
                     double *out, ptrdiff_t ldo, double *work)
{
    ptrdiff_t mp = pid_padded(m);
    pid_transpose(B, m, d, work, mp);
    pid_gram_rows(A, n, work, mp, d, out, ldo);
}

/* Row/column minima of a block of cost rows; rows are global rows i0.. of the
 * full matrix. Strict '<' keeps the first index on ties. */
static void pid_update_mins(const double *Cs, ptrdiff_t nr, ptrdiff_t m, ptrdiff_t i0,
                            double *rowmin, ptrdiff_t *rowarg,
                            double *colmin, ptrdiff_t *colarg)
{
    ptrdiff_t r, j;
    for (r = 0; r < nr; r++) {
        const double *c = Cs + (size_t)r * m;
        if (rowmin) {
            double b = c[0];
            ptrdiff_t a = 0;
            j = 1;
            if (m >= 16) {
                /* lane l tracks columns j = l (mod 8); ties resolve to the smallest index */
                pid_v8 lb = *(const pid_v8 *)c;
                pid_v8l la = {0, 1, 2, 3, 4, 5, 6, 7}, idx = la;
                int l;
                for (j = 8; j + 8 <= m; j += 8) {
                    pid_v8 x = *(const pid_v8 *)(c + j);
                    pid_v8l lt = x < lb;
                    idx += 8;
                    lb = pid_sel(lt, x, lb);
                    la = (idx & lt) | (la & ~lt);
                }
                b = lb[0];
                a = la[0];
                for (l = 1; l < 8; l++)
                    if (lb[l] < b || (lb[l] == b && la[l] < a)) { b = lb[l]; a = la[l]; }
            }
            for (; j < m; j++) {
                int lt = c[j] < b;
                b = lt ? c[j] : b;
                a = lt ? j : a;
            }
            rowmin[i0 + r] = b;
            rowarg[i0 + r] = a;
        }
        if (colmin) {
            if (i0 + r == 0) {
                for (j = 0; j < m; j++) { colmin[j] = c[j]; colarg[j] = 0; }
            } else {
                for (j = 0; j < m; j++) {
                    int lt = c[j] < colmin[j];
                    colmin[j] = lt ? c[j] : colmin[j];
                    colarg[j] = lt ? i0 + r : colarg[j];
                }
            }
        }
    }
}

/* Minima of a whole cost matrix along axis 1 (per row) or axis 0 (per column). */
static void pid_min_cost(const double *C, ptrdiff_t n, ptrdiff_t m, int axis,
                         double *best, ptrdiff_t *arg)
{
    if (axis == 1) pid_update_mins(C, n, m, 0, best, arg, NULL, NULL);
    else pid_update_mins(C, n, m, 0, NULL, NULL, best, arg);
}

static inline double pid_cell(double c, const double *up, ptrdiff_t j, double left)
{
    return c + pid_min(pid_min(up[j - 1], up[j]), left);
}

static void pid_first_row(const double *c, double *D, ptrdiff_t m, int subsequence)
{
    ptrdiff_t j;
    if (subsequence) {
        for (j = 0; j < m; j++) D[j] = c[j];
    } else {
        D[0] = c[0];
        for (j = 1; j < m; j++) D[j] = c[j] + D[j - 1];
    }
}

static void pid_row(const double *c, double *D, ptrdiff_t i, ptrdiff_t m)
{
    double *row = D + (size_t)i * m;
    const double *up = row - m;
    double left = c[0] + up[0];
    ptrdiff_t j;
    row[0] = left;
    for (j = 1; j < m; j++) {
        left = pid_cell(c[j], up, j, left);
        row[j] = left;
    }
}

/* Rows i .. i+PID_STRIP-1; row i+r reads its costs from Cs + r*ldc. Needs m > PID_STRIP. */
static void pid_strip(const double *Cs, size_t ldc, double *D, ptrdiff_t i, ptrdiff_t m)
{
    ptrdiff_t j, r, t;
    double lv[PID_STRIP];
    double *row;
    /* prologue: row r starts at step t == r */
    for (t = 0; t < PID_STRIP; t++) {
        for (r = 0; r <= t; r++) {
            j = t - r;
            row = D + (size_t)(i + r) * m;
            if (j == 0) lv[r] = Cs[r * ldc] + row[-m];
            else lv[r] = pid_cell(Cs[r * ldc + j], row - m, j, lv[r]);
            row[j] = lv[r];
        }
    }
    for (t = PID_STRIP; t < m; t++) {
        for (r = 0; r < PID_STRIP; r++) {
            j = t - r;
            row = D + (size_t)(i + r) * m;
            lv[r] = pid_cell(Cs[r * ldc + j], row - m, j, lv[r]);
            row[j] = lv[r];
        }
    }
    /* epilogue: lower rows finish their last columns */
    for (t = m; t < m + PID_STRIP - 1; t++) {
        for (r = t - m + 1; r < PID_STRIP; r++) {
            j = t - r;
            row = D + (size_t)(i + r) * m;
            lv[r] = pid_cell(Cs[r * ldc + j], row - m, j, lv[r]);
            row[j] = lv[r];
        }
    }
}

static void pid_accumulate(const double *C, double *D, ptrdiff_t n, ptrdiff_t m,
                           int subsequence)
{
    ptrdiff_t i = 1;
    pid_first_row(C, D, m, subsequence);
    if (m > PID_STRIP)
        for (; i + PID_STRIP <= n; i += PID_STRIP)
            pid_strip(C + (size_t)i * m, (size_t)m, D, i, m);
    for (; i < n; i++) pid_row(C + (size_t)i * m, D, i, m);
}

/* Doubles of scratch space pid_align needs for a candidate of m rows. */
static inline size_t pid_work_size(ptrdiff_t m, ptrdiff_t d)
{
    return (size_t)(PID_STRIP + d) * pid_padded(m);
}

/* Accumulated cost of aligning the rows of A (n x d) to the rows of B (m x d)
 * under cosine cost. work must hold pid_work_size(m, d) doubles. The min
 * outputs (row minima over columns, column minima over rows, first index on
 * ties) are filled when non-NULL. Passing D == NULL skips the recurrence. */
static void pid_align_t(const double *A, ptrdiff_t n, const double *Bt, ptrdiff_t m, ptrdiff_t d,
                        int subsequence, double *D, double *Cs,
                        double *rowmin, ptrdiff_t *rowarg, double *colmin, ptrdiff_t *colarg)
{
    ptrdiff_t mp = pid_padded(m), i = 0, nr, r;
    while (i < n) {
        if (i > 0 && m > PID_STRIP && i + PID_STRIP <= n) nr = PID_STRIP;
        else nr = 1;
        pid_gram_rows(A + (size_t)i * d, nr, Bt, mp, d, Cs, mp);
        for (r = 0; r < nr; r++) pid_cost_from_gram(Cs + (size_t)r * mp, (size_t)m);
        if (rowmin || colmin)
            for (r = 0; r < nr; r++)
                pid_update_mins(Cs + (size_t)r * mp, 1, m, i + r, rowmin, rowarg, colmin, colarg);
        if (D) {
            if (i == 0) pid_first_row(Cs, D, m, subsequence);
            else if (nr == PID_STRIP) pid_strip(Cs, (size_t)mp, D, i, m);
            else pid_row(Cs, D, i, m);
        }
        i += nr;
    }
}

static void pid_align(const double *A, ptrdiff_t n, const double *B, ptrdiff_t m, ptrdiff_t d,
                      int subsequence, double *D, double *work,
                      double *rowmin, ptrdiff_t *rowarg, double *colmin, ptrdiff_t *colarg)
{
    ptrdiff_t mp = pid_padded(m);
    double *Bt = work + (size_t)PID_STRIP * mp;
    pid_transpose(B, m, d, Bt, mp);
    pid_align_t(A, n, Bt, m, d, subsequence, D, work, rowmin, rowarg, colmin, colarg);
}

/* Doubles needed to hold every piece of a bank transposed and padded. */
static size_t pid_bank_size(const ptrdiff_t *off, ptrdiff_t npieces, ptrdiff_t d)
{
    size_t total = 0;
    ptrdiff_t k;
    for (k = 0; k < npieces; k++) total += (size_t)d * pid_padded(off[k + 1] - off[k]);
    return total;
}

/* Transposed, zero-padded copy of every piece, stored back to back. */
static void pid_transpose_bank(const double *bank, const ptrdiff_t *off, ptrdiff_t npieces,
                               ptrdiff_t d, double *tbank)
{
    ptrdiff_t k, m, mp;
    for (k = 0; k < npieces; k++) {
        m = off[k + 1] - off[k];
        mp = pid_padded(m);
        pid_transpose(bank + (size_t)off[k] * d, m, d, tbank, mp);
        tbank += (size_t)d * mp;
    }
}

/* Leftmost minimum of the last row. */
static ptrdiff_t pid_last_row_argmin(const double *D, ptrdiff_t n, ptrdiff_t m)
{
    const double *last = D + (size_t)(n - 1) * m;
    ptrdiff_t j, end = 0;
    for (j = 1; j < m; j++)
        if (last[j] < last[end]) end = j;
    return end;
}

/* Walks back from (n-1, end). Returns the number of path cells and stores the
 * first cell's column in *start. When pi/pj are non-NULL the cells are written
 * to them in reverse order (they must hold n + m - 1 entries). With
 * `transposed` set the tie rule is diagonal, then horizontal, then vertical:
 * the rule of the same problem with rows and columns swapped.
 */
static ptrdiff_t pid_backtrack(const double *D, ptrdiff_t n, ptrdiff_t m, ptrdiff_t end,
                               int subsequence, int transposed,
                               ptrdiff_t *pi, ptrdiff_t *pj, ptrdiff_t *start)
{
    ptrdiff_t i = n - 1, j = end, len = 0;
    for (;;) {
        if (pi) { pi[len] = i; pj[len] = j; }
        len++;
        if (i == 0 && (subsequence || j == 0)) break;
        if (i == 0) { j--; continue; }
        if (j == 0) { i--; continue; }
        {
            double diag = D[(size_t)(i - 1) * m + j - 1];
            double up = D[(size_t)(i - 1) * m + j];
            double left = D[(size_t)i * m + j - 1];
            int step = 0; /* 0 diagonal, 1 vertical, 2 horizontal */
            double best = diag;
            if (transposed) {
                if (left < best) { best = left; step = 2; }
                if (up < best) { best = up; step = 1; }
            } else {
                if (up < best) { best = up; step = 1; }
                if (left < best) { best = left; step = 2; }
            }
            if (step == 0) { i--; j--; }
            else if (step == 1) i--;
            else j--;
        }
    }
    *start = j;
    return len;
}

/* Align Q (n x d) against every piece of a bank; piece k owns bank rows
 * off[k] .. off[k+1]-1. D and work must fit the longest piece. Outputs (any
 * may be NULL): cost, len, start per piece for the Q-vs-piece problem, len_t
 * for the piece-vs-Q problem (full DTW only), rowmin/rowarg as npieces x n
 * blocks of per-query-row minima, colmin/colarg per bank row. With D NULL
 * only the minima are computed. tbank, if not NULL, is the bank as laid out
 * by pid_transpose_bank and saves transposing every piece again. */
static void pid_scan(const double *Q, ptrdiff_t n, const double *bank, const ptrdiff_t *off,
                     const double *tbank, ptrdiff_t npieces, ptrdiff_t d, int subsequence,
                     double *D, double *work, double *cost, ptrdiff_t *len, ptrdiff_t *start, ptrdiff_t *len_t,
                     double *rowmin, ptrdiff_t *rowarg, double *colmin, ptrdiff_t *colarg)
{
    ptrdiff_t k, m, end, st;
    double *rmin, *cmin;
    ptrdiff_t *rarg, *carg;
    for (k = 0; k < npieces; k++) {
        m = off[k + 1] - off[k];
        rmin = rowmin ? rowmin + (size_t)k * n : NULL;
        rarg = rowmin ? rowarg + (size_t)k * n : NULL;
        cmin = colmin ? colmin + off[k] : NULL;
        carg = colmin ? colarg + off[k] : NULL;
        if (tbank) {
            pid_align_t(Q, n, tbank, m, d, subsequence, D, work, rmin, rarg, cmin, carg);
            tbank += (size_t)d * pid_padded(m);
        } else {
            pid_align(Q, n, bank + (size_t)off[k] * d, m, d, subsequence, D, work,
                      rmin, rarg, cmin, carg);
        }
        if (!D) continue;
        end = subsequence ? pid_last_row_argmin(D, n, m) : m - 1;
        if (cost) cost[k] = D[(size_t)(n - 1) * m + end];
        if (len) {
            len[k] = pid_backtrack(D, n, m, end, subsequence, 0, NULL, NULL, &st);
            if (start) start[k] = st;
        }
        if (len_t) len_t[k] = pid_backtrack(D, n, m, end, subsequence, 1, NULL, NULL, &st);
    }
}

#endif
