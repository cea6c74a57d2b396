use nhlab::model::*;
use num_complex::Complex64 as C;
fn main(){
 let p = ModelParams::jordan_bound(1.0, C::new(0.0,1.0)).unwrap();
 for x in [-10.0f64, -5.0, 5.0] {
 for d in [1e-2,1e-3,1e-4,1e-5,1e-6,0.0] {
   let k = C::new(0.0, 1.0-d);
   let (a,b) = p.log_derivatives(x);
   println!("{x} {d} {} A={} B={}", p.continuum_numerator(x,k), a, b);
 }}
}
