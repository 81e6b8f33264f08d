#pragma once

#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "sasmate/error.hpp"

namespace sasmate {

/// One line of the element table.
struct ElementRecord {
  std::string symbol;
  int atomic_number = 0;
  double atomic_mass = 0.0;     // g/mol
  double b_coh = 0.0;           // fm, real part of the bound coherent length
  double sigma_abs_2200 = 0.0;  // barn, absorption at 2200 m/s
};

// Bound coherent scattering lengths and 2200 m/s absorption cross sections
// from the NIST neutron scattering length compilation (Sears, 1992); masses
// are standard atomic weights. Isotopes use "Symbol[A]"; D and T alias H[2]
// and H[3].
inline constexpr std::string_view kElementTableText = R"(# SYMBOL Z MASS B_COH SIGMA_ABS
H     1   1.00794     -3.7390   0.3326
D     1   2.014102     6.671    0.000519
T     1   3.016049     4.792    0.0
H[1]  1   1.007825    -3.7406   0.3326
H[2]  1   2.014102     6.671    0.000519
H[3]  1   3.016049     4.792    0.0
He    2   4.002602     3.26     0.00747
Li    3   6.941       -1.90    70.5
Li[6] 3   6.015122     2.00   940.0
Li[7] 3   7.016004    -2.22     0.0454
Be    4   9.012182     7.79     0.0076
B     5  10.811        5.30   767.0
B[10] 5  10.012937    -0.1   3835.0
B[11] 5  11.009305     6.65     0.0055
C     6  12.0107       6.6460   0.0035
C[12] 6  12.0          6.6511   0.00353
C[13] 6  13.003355     6.19     0.00137
N     7  14.0067       9.36     1.90
N[14] 7  14.003074     9.37     1.91
N[15] 7  15.000109     6.44     0.000024
O     8  15.9994       5.803    0.00019
O[16] 8  15.994915     5.803    0.0001
O[18] 8  17.99916      5.84     0.00016
F     9  18.9984032    5.654    0.0096
Ne   10  20.1797       4.566    0.039
Na   11  22.98977      3.63     0.53
Mg   12  24.305        5.375    0.063
Al   13  26.981538     3.449    0.231
Si   14  28.0855       4.1491   0.171
P    15  30.973761     5.13     0.172
S    16  32.065        2.847    0.53
Cl   17  35.453        9.5770  33.5
Ar   18  39.948        1.909    0.675
K    19  39.0983       3.67     2.1
Ca   20  40.078        4.70     0.43
Sc   21  44.95591     12.29    27.5
Ti   22  47.867       -3.438    6.09
V    23  50.9415      -0.3824   5.08
Cr   24  51.9961       3.635    3.05
Mn   25  54.938049    -3.73    13.3
Fe   26  55.845        9.45     2.56
Co   27  58.9332       2.49    37.18
Ni   28  58.6934      10.3      4.49
Cu   29  63.546        7.718    3.78
Zn   30  65.409        5.680    1.11
Ga   31  69.723        7.288    2.75
Ge   32  72.64         8.185    2.2
As   33  74.9216       6.58     4.5
Se   34  78.96         7.970   11.7
Br   35  79.904        6.795    6.9
Kr   36  83.798        7.81    25.0
Rb   37  85.4678       7.09     0.38
Sr   38  87.62         7.02     1.28
Y    39  88.90585      7.75     1.28
Zr   40  91.224        7.16     0.185
Nb   41  92.90638      7.054    1.15
Mo   42  95.94         6.715    2.48
Pd   46 106.42         5.91     6.9
Ag   47 107.8682       5.922   63.3
Cd   48 112.411        4.87  2520.0
In   49 114.818        4.065  193.8
Sn   50 118.71         6.225    0.626
Sb   51 121.76         5.57     4.91
Te   52 127.6          5.80     4.7
I    53 126.90447      5.28     6.15
Xe   54 131.293        4.92    23.9
Cs   55 132.90545      5.42    29.0
Ba   56 137.327        5.07     1.1
La   57 138.9055       8.24     8.97
Ce   58 140.116        4.84     0.63
Gd   64 157.25         6.5  49700.0
Ta   73 180.9479       6.91    20.6
W    74 183.84         4.86    18.3
Pt   78 195.078        9.60    10.3
Au   79 196.96655      7.63    98.65
Hg   80 200.59        12.595  372.3
Pb   82 207.2          9.405    0.171
Bi   83 208.98038      8.532    0.0338
U    92 238.02891      8.417    7.57
)";

class ElementTable {
 public:
  /// Parses `SYMBOL Z MASS B_COH SIGMA_ABS` records; '#' starts a comment line.
  static ElementTable parse(std::string_view text) {
    ElementTable table;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream fields(line);
      ElementRecord rec;
      if (!(fields >> rec.symbol >> rec.atomic_number >> rec.atomic_mass >> rec.b_coh >>
            rec.sigma_abs_2200)) {
        throw std::invalid_argument("element table line " + std::to_string(line_no) +
                                    ": expected SYMBOL Z MASS B_COH SIGMA_ABS");
      }
      if (rec.atomic_mass <= 0.0 || rec.atomic_number < 1 || rec.sigma_abs_2200 < 0.0) {
        throw std::invalid_argument("element table line " + std::to_string(line_no) +
                                    ": invalid values for " + rec.symbol);
      }
      table.records_[rec.symbol] = rec;
    }
    return table;
  }

  static const ElementTable& builtin() {
    static const ElementTable table = parse(kElementTableText);
    return table;
  }

  const ElementRecord* find(std::string_view symbol) const {
    auto it = records_.find(std::string(symbol));
    return it == records_.end() ? nullptr : &it->second;
  }

  const ElementRecord& at(std::string_view symbol) const {
    if (const auto* rec = find(symbol)) return *rec;
    throw Error(ErrorCode::UnknownElement, std::string(symbol));
  }

  std::size_t size() const { return records_.size(); }
  const std::map<std::string, ElementRecord>& records() const { return records_; }

 private:
  std::map<std::string, ElementRecord> records_;
};

}  // namespace sasmate
