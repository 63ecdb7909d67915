#include <stdint.h>
#include <math.h>
#ifdef _OPENMP
#include <omp.h>
#endif

int forward(double *u_vec, double *damp_vec, double *m_vec, double *src_vec, int64_t *src_idx_vec, double *src_w_vec, double *rec_vec, int64_t *rec_idx_vec, double *rec_w_vec, long i1block, long i2block)
{
  double (*u)[89][89] = (double (*)[89][89]) u_vec;
  double (*damp)[89] = (double (*)[89]) damp_vec;
  double (*m)[89] = (double (*)[89]) m_vec;
  double (*src)[1] = (double (*)[1]) src_vec;
  int64_t (*src_idx)[4][2] = (int64_t (*)[4][2]) src_idx_vec;
  double (*src_w)[4] = (double (*)[4]) src_w_vec;
  double (*rec)[11] = (double (*)[11]) rec_vec;
  int64_t (*rec_idx)[4][2] = (int64_t (*)[4][2]) rec_idx_vec;
  double (*rec_w)[4] = (double (*)[4]) rec_w_vec;
  if (i1block < 1 || i2block < 1)
  {
    return 1;
  }
  #pragma omp parallel
  {
    for (int s = 0; s < 3; s++)
    {
      #pragma omp for schedule(static)
      for (int i1 = 0; i1 < 89; i1++)
      {
        for (int i2 = 0; i2 < 89; i2++)
        {
          u[s][i1][i2] = 0.0;
        }
      }
    }
    for (long t = 2; t < 300; t++)
    {
      const long tm2 = (t - 2) % 3;
      const long tm1 = (t - 1) % 3;
      const long t0 = (t) % 3;
      #pragma omp for schedule(static)
      for (int i1b = 2; i1b < 87 - (85 % i1block); i1b += i1block)
      {
        for (int i2b = 2; i2b < 87 - (85 % i2block); i2b += i2block)
        {
          for (int i1 = i1b; i1 < i1b + i1block; i1++)
          {
            #pragma omp simd aligned(damp, m, u:64)
            for (int i2 = i2b; i2 < i2b + i2block; i2++)
            {
              double temp0 = damp[i1][i2];
              double temp1 = m[i1][i2];
              double temp2 = u[tm1][i1][i2];
              double temp3 = u[tm2][i1][i2];
              u[t0][i1][i2] = -(1.0/((0.09072184232530289*temp0 + 0.03292181069958848*temp1)))*(0.00037037037037037035*u[tm1][i1 - 2][i2] - 0.005925925925925926*u[tm1][i1 - 1][i2] + 0.00037037037037037035*u[tm1][i1][i2 - 2] - 0.005925925925925926*u[tm1][i1][i2 - 1] + 0.022222222222222223*temp2 - 0.005925925925925926*u[tm1][i1][i2 + 1] + 0.00037037037037037035*u[tm1][i1][i2 + 2] - 0.005925925925925926*u[tm1][i1 + 1][i2] + 0.00037037037037037035*u[tm1][i1 + 2][i2] - 0.09072184232530289*temp0*temp3 + 0.03292181069958848*temp1*temp3 - 0.06584362139917696*temp1*temp2);
            }
          }
        }
      }
      #pragma omp for schedule(static)
      for (int i1 = 87 - (85 % i1block); i1 < 87; i1++)
      {
        #pragma omp simd aligned(damp, m, u:64)
        for (int i2 = 2; i2 < 87; i2++)
        {
          double temp0 = damp[i1][i2];
          double temp1 = m[i1][i2];
          double temp2 = u[tm1][i1][i2];
          double temp3 = u[tm2][i1][i2];
          u[t0][i1][i2] = -(1.0/((0.09072184232530289*temp0 + 0.03292181069958848*temp1)))*(0.00037037037037037035*u[tm1][i1 - 2][i2] - 0.005925925925925926*u[tm1][i1 - 1][i2] + 0.00037037037037037035*u[tm1][i1][i2 - 2] - 0.005925925925925926*u[tm1][i1][i2 - 1] + 0.022222222222222223*temp2 - 0.005925925925925926*u[tm1][i1][i2 + 1] + 0.00037037037037037035*u[tm1][i1][i2 + 2] - 0.005925925925925926*u[tm1][i1 + 1][i2] + 0.00037037037037037035*u[tm1][i1 + 2][i2] - 0.09072184232530289*temp0*temp3 + 0.03292181069958848*temp1*temp3 - 0.06584362139917696*temp1*temp2);
        }
      }
      #pragma omp for schedule(static)
      for (int i1 = 2; i1 < 87 - (85 % i1block); i1++)
      {
        #pragma omp simd aligned(damp, m, u:64)
        for (int i2 = 87 - (85 % i2block); i2 < 87; i2++)
        {
          double temp0 = damp[i1][i2];
          double temp1 = m[i1][i2];
          double temp2 = u[tm1][i1][i2];
          double temp3 = u[tm2][i1][i2];
          u[t0][i1][i2] = -(1.0/((0.09072184232530289*temp0 + 0.03292181069958848*temp1)))*(0.00037037037037037035*u[tm1][i1 - 2][i2] - 0.005925925925925926*u[tm1][i1 - 1][i2] + 0.00037037037037037035*u[tm1][i1][i2 - 2] - 0.005925925925925926*u[tm1][i1][i2 - 1] + 0.022222222222222223*temp2 - 0.005925925925925926*u[tm1][i1][i2 + 1] + 0.00037037037037037035*u[tm1][i1][i2 + 2] - 0.005925925925925926*u[tm1][i1 + 1][i2] + 0.00037037037037037035*u[tm1][i1 + 2][i2] - 0.09072184232530289*temp0*temp3 + 0.03292181069958848*temp1*temp3 - 0.06584362139917696*temp1*temp2);
        }
      }
      {
        #pragma omp single
        {
          for (int p = 0; p < 1; p++)
          {
            for (int c = 0; c < 4; c++)
            {
              u[t0][src_idx[p][c][0]][src_idx[p][c][1]] += (src_w[p][c]*src[t - 1][p])*(30.374999999999996/m[src_idx[p][c][0]][src_idx[p][c][1]]);
            }
          }
        }
      }
      {
        #pragma omp single
        {
          for (int p = 0; p < 11; p++)
          {
            double acc = 0.0;
            for (int c = 0; c < 4; c++)
            {
              acc += rec_w[p][c]*u[t0][rec_idx[p][c][0]][rec_idx[p][c][1]];
            }
            rec[t][p] = acc;
          }
        }
      }
    }
  }
  return 0;
}

int forward_packed(void **args, const long *blocks, long nthreads)
{
  (void) blocks;
#ifdef _OPENMP
  if (nthreads > 0)
  {
    omp_set_num_threads((int) nthreads);
  }
#else
  (void) nthreads;
#endif
  return forward((double *) args[0], (double *) args[1], (double *) args[2], (double *) args[3], (int64_t *) args[4], (double *) args[5], (double *) args[6], (int64_t *) args[7], (double *) args[8], blocks[0], blocks[1]);
}
